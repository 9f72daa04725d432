#pragma once

#include "cot.hpp"
#include "coverage.hpp"
#include "dataset.hpp"
#include "eval.hpp"
#include "injector.hpp"
#include "mult.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "policy_sim.hpp"
#include "rng.hpp"
#include "sudoku.hpp"
#include "svg.hpp"
#include "tasks.hpp"
