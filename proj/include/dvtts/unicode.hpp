// Copyright 2026 The dvtts Authors
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

#include <string>
#include <string_view>
#include <vector>

namespace dvtts {

// NFC normalisation of UTF-8 text. Throws FormatError on invalid UTF-8.
std::string nfc(std::string_view utf8);

// Splits UTF-8 into one string per code point.
std::vector<std::string> code_points(std::string_view utf8);

// Trims Unicode whitespace from both ends.
std::string strip(std::string_view utf8);

// Splits on runs of Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view utf8);

}  // namespace dvtts
