#pragma once

#include "marsadmm/baselines.hpp"
#include "marsadmm/common.hpp"
#include "marsadmm/data_io.hpp"
#include "marsadmm/estimator.hpp"
#include "marsadmm/manifold.hpp"
#include "marsadmm/problem.hpp"
#include "marsadmm/rng.hpp"
#include "marsadmm/solver.hpp"
#include "marsadmm/trace.hpp"
