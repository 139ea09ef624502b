// Copyright 2026 The vlapath Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "vlapath/dataset_pipeline.hpp"
#include "vlapath/error.hpp"
#include "vlapath/geometry.hpp"
#include "vlapath/hier_harness.hpp"
#include "vlapath/image_io.hpp"
#include "vlapath/json_io.hpp"
#include "vlapath/pathcore.hpp"
#include "vlapath/rank_service.hpp"
#include "vlapath/render.hpp"
#include "vlapath/vqa_format.hpp"
