#pragma once

// Umbrella header: metric learning inside kernel ridge regression with
// projected gradient descent on the PSD cone, plus the simulation harness
// around it.

#include "kmlearn/dataset.hpp"
#include "kmlearn/errors.hpp"
#include "kmlearn/harness.hpp"
#include "kmlearn/kernels.hpp"
#include "kmlearn/krr.hpp"
#include "kmlearn/optimizer.hpp"
#include "kmlearn/records.hpp"
#include "kmlearn/report.hpp"
#include "kmlearn/rng.hpp"
#include "kmlearn/scenarios.hpp"
#include "kmlearn/spectral.hpp"
#include "kmlearn/svg.hpp"
#include "kmlearn/sym_matrix.hpp"
