#include "mtrank/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>
#include <unicode/utypes.h>

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "mtrank/error.hpp"

namespace mtrank {

namespace {

icu::UnicodeString to_unicode(std::string_view text) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  for (int32_t i = 0; i < length;) {
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) throw DataError("invalid UTF-8 text");
  }
  return icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), length));
}

icu::UnicodeString normalize(const icu::UnicodeString& u) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString out = n->normalize(u, status);
  if (U_FAILURE(status)) throw DataError("NFC normalization failed");
  return out;
}

}  // namespace

std::string nfc(std::string_view text) {
  std::string out;
  normalize(to_unicode(text)).toUTF8String(out);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  icu::UnicodeString u = normalize(to_unicode(text));
  u.toLower(icu::Locale::getRoot());
  std::string lowered;
  u.toUTF8String(lowered);
  return split_ws(lowered);
}

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

double parse_real(std::string_view field) {
  if (field.empty()) throw std::invalid_argument("empty numeric field");
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  const auto [end, ec] = std::from_chars(first, last, v, std::chars_format::general);
  if (ec != std::errc() || end != last || !std::isfinite(v)) {
    throw std::invalid_argument("not a finite decimal number: '" + std::string(field) + "'");
  }
  return v;
}

std::string trim_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace mtrank
