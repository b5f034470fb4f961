#pragma once

#include <string_view>

// Default data files baked into the binary at build time. The originals live
// under data/ and stay diffable; CMake regenerates these entries on change.
namespace ward::embedded {

std::string_view sections_json();
std::string_view bhc_structure_json();
std::string_view di_structure_json();
std::string_view bhc_prompt_text();
std::string_view di_prompt_text();

}  // namespace ward::embedded
