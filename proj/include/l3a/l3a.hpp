/*
 * Copyright 2026 The L3A Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Umbrella header.

#pragma once

#include "l3a/checkpoint.hpp"
#include "l3a/data_model.hpp"
#include "l3a/error.hpp"
#include "l3a/feature_expansion.hpp"
#include "l3a/harness.hpp"
#include "l3a/io.hpp"
#include "l3a/metrics.hpp"
#include "l3a/pseudo_label.hpp"
#include "l3a/rng.hpp"
#include "l3a/wac.hpp"
