// Copyright 2026 The etaopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ETAOPT_ETAOPT_HPP
#define ETAOPT_ETAOPT_HPP

#include "etaopt/errors.hpp"
#include "etaopt/model_api.hpp"
#include "etaopt/models.hpp"
#include "etaopt/probe.hpp"
#include "etaopt/optimizers.hpp"
#include "etaopt/data.hpp"
#include "etaopt/verify.hpp"
#include "etaopt/config.hpp"
#include "etaopt/harness.hpp"
#include "etaopt/compare.hpp"

#endif  // ETAOPT_ETAOPT_HPP
