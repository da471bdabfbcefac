#pragma once

#include <stdexcept>
#include <string>

namespace mmfnd {

/// Base class for every failure raised by the kit. Carries an optional
/// article id so per-record failures can be traced back to the manifest.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string article_id = {})
      : std::runtime_error(article_id.empty() ? what : what + " (article " + article_id + ")"),
        article_id_(std::move(article_id)) {}

  const std::string& article_id() const noexcept { return article_id_; }

 private:
  std::string article_id_;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class ImageDecodeError : public Error {
 public:
  using Error::Error;
};

class TranslationError : public Error {
 public:
  using Error::Error;
};

class EncoderError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmfnd
