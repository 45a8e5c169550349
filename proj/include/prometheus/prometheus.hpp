/*
 * Copyright (c) 2026, The Prometheus Tracker Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include "prometheus/clustering.hpp"
#include "prometheus/core.hpp"
#include "prometheus/geometry.hpp"
#include "prometheus/graph.hpp"
#include "prometheus/image.hpp"
#include "prometheus/imaging.hpp"
#include "prometheus/pipeline.hpp"
#include "prometheus/reconstruction.hpp"
#include "prometheus/spectral.hpp"
#include "prometheus/synth.hpp"
#include "prometheus/tracking.hpp"
#include "prometheus/union_find.hpp"
