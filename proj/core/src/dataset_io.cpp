// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "disam/format.hpp"
#include "disam/problems.hpp"

namespace disam {

void write_dataset(std::ostream& out, const DomainDataset& data) {
  out << "# disam-dataset v1 domains=" << data.num_domains() << " classes=" << data.num_classes
      << " dim=" << data.input_dim << '\n';
  for (const auto& dom : data.domains) {
    for (const auto& s : dom) {
      out << s.domain << ' ' << s.label;
      for (double f : s.features) out << ' ' << format_double(f);
      out << '\n';
    }
  }
}

namespace {

int header_field(const std::string& header, const std::string& key) {
  const auto pos = header.find(key + "=");
  if (pos == std::string::npos) throw ConfigError("dataset header missing '" + key + "'");
  int value = 0;
  const char* first = header.data() + pos + key.size() + 1;
  const auto [ptr, ec] = std::from_chars(first, header.data() + header.size(), value);
  if (ec != std::errc()) throw ConfigError("dataset header has a malformed '" + key + "'");
  return value;
}

}  // namespace

DomainDataset read_dataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# disam-dataset v1", 0) != 0) {
    throw ConfigError("not a disam-dataset v1 file");
  }
  DomainDataset data;
  const int m = header_field(header, "domains");
  data.num_classes = header_field(header, "classes");
  data.input_dim = header_field(header, "dim");
  if (m < 1 || data.input_dim < 1) throw ConfigError("dataset header has invalid sizes");
  data.domains.resize(m);

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    Sample s;
    std::string tok;
    if (!(row >> s.domain >> s.label)) throw ConfigError("dataset line " + std::to_string(line_no) + ": bad ids");
    while (row >> tok) s.features.push_back(parse_double(tok));
    if (s.domain < 0 || s.domain >= m) {
      throw ConfigError("dataset line " + std::to_string(line_no) + ": domain id out of range");
    }
    data.domains[s.domain].push_back(std::move(s));
  }
  data.validate();
  return data;
}

}  // namespace disam
