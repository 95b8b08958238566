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

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

// Little-endian primitives for the binary file formats. Readers throw
// FormatError on truncated input.
namespace dvtts::binio {

void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
void write_magic(std::ostream& os, std::string_view magic);

std::uint16_t read_u16(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
std::string read_bytes(std::istream& is, std::size_t n);
// Reads magic.size() bytes and throws FormatError naming `what` on mismatch.
void expect_magic(std::istream& is, std::string_view magic, std::string_view what);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dvtts::binio
