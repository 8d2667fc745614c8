// Copyright 2026 The vinr Authors.
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

#ifndef VINR_INVERSE_NORMAL_H_
#define VINR_INVERSE_NORMAL_H_

namespace vinr {

// Standard normal quantile function, Wichura's AS 241 (PPND16) rational
// approximation; relative accuracy about 1e-16 on (0, 1). Returns -inf/+inf
// at 0 and 1 and NaN outside [0, 1].
double inverse_normal_cdf(double p);

}  // namespace vinr

#endif  // VINR_INVERSE_NORMAL_H_
