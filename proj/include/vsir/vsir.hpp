/*
* Copyright (C) 2026 The vsir authors
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
*/
#pragma once

#include "vsir/config_io.hpp"
#include "vsir/denominator.hpp"
#include "vsir/experiment.hpp"
#include "vsir/infectivity.hpp"
#include "vsir/kernel.hpp"
#include "vsir/mean_field.hpp"
#include "vsir/measure_lab.hpp"
#include "vsir/model_core.hpp"
#include "vsir/oracle.hpp"
#include "vsir/stochastic_sim.hpp"
