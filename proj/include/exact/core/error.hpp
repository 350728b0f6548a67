#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exact {

enum class Errc {
  invalid_argument,
  geometry_mismatch,
  out_of_range,
  malformed_header,
  truncated_payload,
  unknown_dtype,
  io,
  generation,
  non_finite,
  undefined_metric,
  unparseable_response,
  invalid_option,
  empty_phenotype,
  transport,
  mock_fixture_missing,
  config,
};

constexpr std::string_view to_string(Errc c) noexcept {
  switch (c) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::geometry_mismatch: return "geometry_mismatch";
    case Errc::out_of_range: return "out_of_range";
    case Errc::malformed_header: return "malformed_header";
    case Errc::truncated_payload: return "truncated_payload";
    case Errc::unknown_dtype: return "unknown_dtype";
    case Errc::io: return "io";
    case Errc::generation: return "generation";
    case Errc::non_finite: return "non_finite";
    case Errc::undefined_metric: return "undefined_metric";
    case Errc::unparseable_response: return "unparseable_response";
    case Errc::invalid_option: return "invalid_option";
    case Errc::empty_phenotype: return "empty_phenotype";
    case Errc::transport: return "transport";
    case Errc::mock_fixture_missing: return "mock_fixture_missing";
    case Errc::config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can tell error kinds apart without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace exact
