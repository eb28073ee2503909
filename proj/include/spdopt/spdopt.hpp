#pragma once

// Core library: SPD kernels, geometries, problems, solvers and diagnostics.
// The experiment harness (harness.hpp, checks.hpp) additionally needs
// nlohmann_json and is not pulled in here.

#include "spdopt/dataset.hpp"
#include "spdopt/diagnostics.hpp"
#include "spdopt/errors.hpp"
#include "spdopt/generators.hpp"
#include "spdopt/gmm.hpp"
#include "spdopt/manifold.hpp"
#include "spdopt/model.hpp"
#include "spdopt/problems.hpp"
#include "spdopt/product.hpp"
#include "spdopt/random.hpp"
#include "spdopt/solvers.hpp"
#include "spdopt/symlinalg.hpp"
