#pragma once

#include <map>
#include <string>
#include <vector>

namespace rhetoric {

// Text assets compiled in from assets/ (system prompt sections, shipped
// preset configs). Keys are paths relative to assets/.
const std::map<std::string, std::string>& embedded_assets();

// Throws if the asset does not exist.
const std::string& asset_text(const std::string& rel_path);

// Assembles the versioned system prompt for the given coarse types:
// persona header, numbered definition-plus-cases sections, and the
// closing "no rhetoric" entry. Types not listed are left out, which is
// how the SEPA groups get their shorter prompts.
std::string build_system_prompt(const std::string& version,
                                const std::vector<std::string>& coarse_types);

}  // namespace rhetoric
