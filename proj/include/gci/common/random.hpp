#pragma once

#include <string>

namespace gci {

/// Hex of `bytes` bytes from the system CSPRNG.
std::string random_hex(std::size_t bytes);

}  // namespace gci
