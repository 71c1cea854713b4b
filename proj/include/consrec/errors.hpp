#pragma once

#include <stdexcept>
#include <string>

namespace consrec {

// Exit-code convention: 1 usage/config, 2 data, 3 numeric.
class Error : public std::runtime_error {
 public:
  Error(std::string msg, int exit_code)
      : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string msg) : Error(std::move(msg), 1) {}
};

class DataError : public Error {
 public:
  explicit DataError(std::string msg) : Error(std::move(msg), 2) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(std::string msg) : Error(std::move(msg), 3) {}
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : DataError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownItem : public DataError {
 public:
  explicit UnknownItem(const std::string& item_id)
      : DataError("unknown item: " + item_id), item_id_(item_id) {}
  const std::string& item_id() const { return item_id_; }

 private:
  std::string item_id_;
};

}  // namespace consrec
