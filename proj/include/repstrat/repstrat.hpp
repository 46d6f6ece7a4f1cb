// Copyright 2026 The RepStrat Authors
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


#pragma once

#include "repstrat/allocation.hpp"
#include "repstrat/app.hpp"
#include "repstrat/errors.hpp"
#include "repstrat/estimation.hpp"
#include "repstrat/money.hpp"
#include "repstrat/montecarlo.hpp"
#include "repstrat/normal.hpp"
#include "repstrat/population.hpp"
#include "repstrat/random.hpp"
#include "repstrat/report.hpp"
#include "repstrat/sampling.hpp"
#include "repstrat/serialize.hpp"
