#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nbdiff {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument values (bad schedule bounds, N = 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or truncated artifact files (banks, checkpoints, packets, records).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Packet header could not be recovered; the receiver must drop the packet.
class PacketLostError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Training produced a non-finite loss or non-finite parameters.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace nbdiff
