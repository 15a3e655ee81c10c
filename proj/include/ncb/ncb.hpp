// Copyright 2026 The NCB Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header for the whole library.

#pragma once

#include "ncb/baselines.hpp"
#include "ncb/bpg.hpp"
#include "ncb/config.hpp"
#include "ncb/experiment.hpp"
#include "ncb/exploitability.hpp"
#include "ncb/gradients.hpp"
#include "ncb/market.hpp"
#include "ncb/oracle.hpp"
#include "ncb/oracle_suite.hpp"
#include "ncb/policy.hpp"
#include "ncb/report.hpp"
#include "ncb/rng.hpp"
#include "ncb/rollout.hpp"
