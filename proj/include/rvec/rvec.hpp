// rvec/rvec.hpp

// Copyright 2026  The rvec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef RVEC_RVEC_HPP_
#define RVEC_RVEC_HPP_

#include "rvec/aam.hpp"
#include "rvec/audio.hpp"
#include "rvec/augment.hpp"
#include "rvec/checkpoint.hpp"
#include "rvec/common.hpp"
#include "rvec/dsp.hpp"
#include "rvec/fbank.hpp"
#include "rvec/metrics.hpp"
#include "rvec/net.hpp"
#include "rvec/pipeline.hpp"
#include "rvec/scoring.hpp"
#include "rvec/store.hpp"

#endif  // RVEC_RVEC_HPP_
