#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace psdg {

/// Base class of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in a grammar file, with 1-based position.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

enum class DiagnosticKind {
  UndeclaredSymbol,
  NormalizationViolation,
  NonTailRecursion,
  EmptyRhs,
  BadDistribution,
  DuplicateDefinition,
};

const char* to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
  std::size_t line = 0;  // 0 when no source location applies
  std::size_t column = 0;
};

/// Raised by validation with every violation found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed observation line or other structured input.
class FormatError : public Error {
 public:
  using Error::Error;
};

class SetTooLarge : public Error {
 public:
  using Error::Error;
};

class SupportTooLarge : public Error {
 public:
  using Error::Error;
};

/// The observation has probability zero under the current belief.
class ZeroEvidence : public Error {
 public:
  using Error::Error;
};

class DeadEnd : public Error {
 public:
  using Error::Error;
};

class InvalidTrajectory : public Error {
 public:
  using Error::Error;
};

class UndefinedConditional : public Error {
 public:
  using Error::Error;
};

class ExplosionBound : public Error {
 public:
  using Error::Error;
};

class ZeroEvidenceMass : public Error {
 public:
  using Error::Error;
};

class UnknownProduction : public Error {
 public:
  using Error::Error;
};

}  // namespace psdg
