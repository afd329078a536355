#pragma once

#include <stdexcept>
#include <string>

namespace collage {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schema violation while decoding JSON. `field` is a dotted path.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& detail)
      : Error("parse error at '" + field + "': " + detail), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& detail)
      : Error("I/O error on '" + path + "': " + detail), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Backend could not be reached or timed out.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Backend answered, but the answer breaks the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// parse_character signal for non-humanoid content. Not a failure of the run.
class NoCharacterDetected : public Error {
 public:
  NoCharacterDetected() : Error("no character detected") {}
};

class CurationError : public Error {
 public:
  CurationError(std::string stage, const std::string& detail, std::string raw_text = {})
      : Error("curation failed in stage '" + stage + "': " + detail),
        stage_(std::move(stage)),
        raw_text_(std::move(raw_text)) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string stage_;
  std::string raw_text_;
};

class ScoringError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ExportError : public Error {
 public:
  using Error::Error;
};

}  // namespace collage
