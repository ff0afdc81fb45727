//
// Copyright 2026 The GSHM Accounting Authors
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
//


// Umbrella header.

#ifndef GSHM_GSHM_H_
#define GSHM_GSHM_H_

#include "gshm/accounting.h"
#include "gshm/calibration.h"
#include "gshm/case_study.h"
#include "gshm/errors.h"
#include "gshm/gaussian_dp.h"
#include "gshm/io.h"
#include "gshm/mechanism.h"
#include "gshm/normal.h"
#include "gshm/philox.h"
#include "gshm/plrv_oracle.h"

#endif  // GSHM_GSHM_H_
