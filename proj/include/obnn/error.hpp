#pragma once

#include <stdexcept>
#include <string>

namespace obnn {

/// Base class for all engine errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Misuse of the circuit builder (foreign wires, bad arity, cyclic references).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Model or architecture fails validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or text input.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Peer violated the session protocol (bad frame, hash mismatch, malformed OT).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Underlying channel failed (connection loss, short read).
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace obnn
