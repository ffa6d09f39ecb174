// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header for the whole library.
#pragma once

#include "csfm/checkpoint.hpp"
#include "csfm/config.hpp"
#include "csfm/config_file.hpp"
#include "csfm/data.hpp"
#include "csfm/errors.hpp"
#include "csfm/eval.hpp"
#include "csfm/gf_analysis.hpp"
#include "csfm/gradcheck.hpp"
#include "csfm/image.hpp"
#include "csfm/loss.hpp"
#include "csfm/metrics.hpp"
#include "csfm/model.hpp"
#include "csfm/nn.hpp"
#include "csfm/ops.hpp"
#include "csfm/optim.hpp"
#include "csfm/parallel.hpp"
#include "csfm/resize.hpp"
#include "csfm/rng.hpp"
#include "csfm/synthetic.hpp"
#include "csfm/tensor.hpp"
#include "csfm/train.hpp"
