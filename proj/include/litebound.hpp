// Copyright 2026 The litebound Authors
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


#ifndef LITEBOUND_LITEBOUND_HPP
#define LITEBOUND_LITEBOUND_HPP

#include "litebound/cli.hpp"
#include "litebound/config.hpp"
#include "litebound/data.hpp"
#include "litebound/error.hpp"
#include "litebound/frequency.hpp"
#include "litebound/image_io.hpp"
#include "litebound/log.hpp"
#include "litebound/losses.hpp"
#include "litebound/metrics.hpp"
#include "litebound/nn.hpp"
#include "litebound/optim.hpp"
#include "litebound/resample.hpp"
#include "litebound/student.hpp"
#include "litebound/teachers.hpp"
#include "litebound/tensor.hpp"
#include "litebound/trainer.hpp"

#endif  // LITEBOUND_LITEBOUND_HPP
