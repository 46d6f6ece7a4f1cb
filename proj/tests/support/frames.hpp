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

#include <vector>

#include "repstrat/population.hpp"

namespace repstrat::testing {

// A frame carrying only stratum moments, no claim records. Enough for the
// allocation functions, which read stats only.
inline PopulationFrame moment_frame(const std::vector<std::size_t>& counts, const std::vector<double>& means,
                                    const std::vector<double>& variances) {
  PopulationFrame f;
  double weighted = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    Stratum s;
    s.stats.count = counts[i];
    s.stats.mean = means[i];
    s.stats.variance = variances[i];
    f.total_count += counts[i];
    weighted += static_cast<double>(counts[i]) * means[i];
    f.strata.push_back(s);
  }
  for (auto& s : f.strata) s.stats.weight = static_cast<double>(s.stats.count) / static_cast<double>(f.total_count);
  f.mean = weighted / static_cast<double>(f.total_count);
  return f;
}

}  // namespace repstrat::testing
