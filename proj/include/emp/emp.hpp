#pragma once

#include "emp/entropy.hpp"
#include "emp/errors.hpp"
#include "emp/finite.hpp"
#include "emp/root.hpp"
#include "emp/sequence.hpp"
#include "emp/series.hpp"
#include "emp/solver.hpp"
#include "emp/spec_file.hpp"
#include "emp/summation.hpp"
