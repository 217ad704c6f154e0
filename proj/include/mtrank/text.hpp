#ifndef MTRANK_TEXT_HPP
#define MTRANK_TEXT_HPP

#include <string>
#include <string_view>
#include <vector>

namespace mtrank {

// NFC-normalizes UTF-8 text. Throws DataError on invalid UTF-8.
std::string nfc(std::string_view text);

// NFC normalization, full Unicode lowercasing, then whitespace split.
std::vector<std::string> tokenize(std::string_view text);

// Splits on a single-character delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view line, char delim);

// Splits on runs of ASCII whitespace, dropping empty fields.
std::vector<std::string> split_ws(std::string_view line);

// Strict decimal parse of a whole field; throws std::invalid_argument otherwise.
double parse_real(std::string_view field);

std::string trim_cr(std::string line);

}  // namespace mtrank

#endif  // MTRANK_TEXT_HPP
