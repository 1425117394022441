// xva/xva.hpp
//
// Copyright 2026 The xva Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XVA_XVA_HPP_
#define XVA_XVA_HPP_

#include "xva/anonymizer.hpp"
#include "xva/clustering.hpp"
#include "xva/dataset.hpp"
#include "xva/distance.hpp"
#include "xva/evaluation.hpp"
#include "xva/plda.hpp"
#include "xva/synthgen.hpp"
#include "xva/types.hpp"

#endif  // XVA_XVA_HPP_
