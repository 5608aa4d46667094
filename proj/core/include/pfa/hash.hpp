// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace pfa {

/// Lower-case hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

/// First 16 hex characters of sha256_hex; used for ids and cache keys.
std::string short_hash(std::string_view data);

}  // namespace pfa
