//  Copyright 2026 The Katalite Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#ifndef KATALITE_DESIGNS_HPP_
#define KATALITE_DESIGNS_HPP_

#include <string>
#include <vector>

#include "katalite/verifier.hpp"

// Hand-encoded reference designs for the built-in benchmarks.
namespace katalite::designs {

CrdtDesign classic_two_phase_set();  // pair of sets, removes shadow adds
CrdtDesign map_two_phase_set();      // Opaque -> OrBool, absent reads true
CrdtDesign add_wins_set();
CrdtDesign remove_wins_set();
CrdtDesign general_counter();
CrdtDesign grow_only_counter();
CrdtDesign grow_only_set();
CrdtDesign lww_register();
CrdtDesign enable_wins_flag();
CrdtDesign disable_wins_flag();
// Single set with union merge; loses removes. Used as a negative example.
CrdtDesign naive_set();

// Every correct reference design, paired with the benchmark it implements.
std::vector<CrdtDesign> reference();
// Looks up reference and negative designs by name ("naive-set", ...).
const CrdtDesign *find(const std::string &name);

}  // namespace katalite::designs

#endif  // KATALITE_DESIGNS_HPP_
