#pragma once

#include <stdexcept>
#include <string>

namespace uq {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- dataset / bundle assembly --------------------------------------------

class ParseError : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class MissingModel : public Error {
 public:
  using Error::Error;
};

class MissingCorrectness : public Error {
 public:
  using Error::Error;
};

// -- similarity ------------------------------------------------------------

class ZeroVector : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class MissingEmbedding : public Error {
 public:
  using Error::Error;
};

class MissingPair : public Error {
 public:
  using Error::Error;
};

class MatrixKeyMismatch : public Error {
 public:
  using Error::Error;
};

// -- estimators ------------------------------------------------------------

class EmptyReference : public Error {
 public:
  using Error::Error;
};

class NoAuxiliaryModels : public Error {
 public:
  using Error::Error;
};

// -- metrics ---------------------------------------------------------------

// AUROC and friends need both correct and incorrect items present.
class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

class TooFewValidIterations : public Error {
 public:
  using Error::Error;
};

// -- diagnostics -----------------------------------------------------------

class TooFewItems : public Error {
 public:
  using Error::Error;
};

class SliceTooSmall : public Error {
 public:
  using Error::Error;
};

class SingleModel : public Error {
 public:
  using Error::Error;
};

class ZeroVariance : public Error {
 public:
  using Error::Error;
};

// -- divergence ------------------------------------------------------------

class LemmaViolation : public Error {
 public:
  using Error::Error;
};

// -- clients ---------------------------------------------------------------

class TransportError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

class RateLimited : public Error {
 public:
  using Error::Error;
};

class DimensionDrift : public Error {
 public:
  using Error::Error;
};

class JudgeUnparseable : public Error {
 public:
  using Error::Error;
};

// -- configuration / pipeline ---------------------------------------------

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace uq
