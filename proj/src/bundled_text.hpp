#pragma once

#include <string_view>

namespace evoens::bundled_text {

extern const std::string_view mc30;
extern const std::string_view geresid50;

extern const std::string_view ensemble_grammar;
extern const std::string_view ensemble_interp_grammar;

} // namespace evoens::bundled_text
