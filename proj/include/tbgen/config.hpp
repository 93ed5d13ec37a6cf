// Copyright 2026 The tbgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Plain-text `key = value` configuration files.
//
// One entry per line, `#` starts a comment, blank lines are ignored. Keys are
// case-sensitive; a repeated key is an error.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tbgen/errors.hpp"

namespace tbgen {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

class KeyValueFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueFile parse(std::istream& in, const std::string& source = "<config>") {
    KeyValueFile kv;
    kv.source_ = source;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = raw;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
      const auto key = detail::trim(line.substr(0, eq));
      const auto value = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw ParseError(source, line_no, "empty key");
      if (kv.find(key)) throw ParseError(source, line_no, "duplicate key '" + std::string(key) + "'");
      kv.entries_.push_back({std::string(key), std::string(value), line_no});
    }
    return kv;
  }

  static KeyValueFile parse_string(const std::string& text, const std::string& source = "<string>") {
    std::istringstream in(text);
    return parse(in, source);
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse(in, path);
  }

  const Entry* find(std::string_view key) const {
    const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
    return it == entries_.end() ? nullptr : &*it;
  }

  bool contains(std::string_view key) const { return find(key) != nullptr; }

  std::optional<std::string> get(std::string_view key) const {
    if (const auto* e = find(key)) return e->value;
    return std::nullopt;
  }

  double get_double(const Entry& e) const { return to_double(e.value, e.line); }

  std::optional<double> get_double(std::string_view key) const {
    if (const auto* e = find(key)) return to_double(e->value, e->line);
    return std::nullopt;
  }

  std::optional<std::int64_t> get_int(std::string_view key) const {
    const auto* e = find(key);
    if (!e) return std::nullopt;
    std::int64_t v = 0;
    const auto* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ParseError(source_, e->line, "'" + e->key + "' is not an integer");
    return v;
  }

  /// Comma-separated list of numbers.
  std::optional<std::vector<double>> get_list(std::string_view key) const {
    const auto* e = find(key);
    if (!e) return std::nullopt;
    std::vector<double> out;
    std::string_view rest = e->value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = detail::trim(rest.substr(0, comma));
      if (item.empty()) throw ParseError(source_, e->line, "empty item in list '" + e->key + "'");
      out.push_back(to_double(std::string(item), e->line));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const std::string& source() const noexcept { return source_; }

 private:
  double to_double(const std::string& text, std::size_t line) const {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      throw ParseError(source_, line, "'" + text + "' is not a number");
    }
    if (used != text.size()) throw ParseError(source_, line, "'" + text + "' is not a number");
    return v;
  }

  std::string source_;
  std::vector<Entry> entries_;
};

}  // namespace tbgen
