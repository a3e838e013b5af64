// Copyright 2026 The CatHarm Authors.
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

#include "catharm/dataio/loaders.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::dataio {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.emplace_back(trim(cur));
  return cells;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool missing(const std::string& s) { return s.empty() || s == "?"; }

std::uint32_t read_be32(std::string_view b, std::size_t at) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3]));
}

}  // namespace

std::vector<SchemaColumn> parse_schema(std::string_view text) {
  std::vector<SchemaColumn> out;
  std::set<std::string> names;
  std::size_t lineno = 0;
  for (std::string_view raw : split_lines(text)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f = split_csv_line(line);
    auto bad = [&](const std::string& why) {
      fail(ErrorKind::kInvalidArgument,
           "schema line " + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != 3) bad("expected column,kind,role");
    SchemaColumn c;
    c.name = f[0];
    if (f[1] == "numeric") {
      c.kind = ColumnKind::kNumeric;
    } else if (f[1] == "categorical") {
      c.kind = ColumnKind::kCategorical;
    } else {
      bad("unknown kind '" + f[1] + "'");
    }
    if (f[2] == "feature") {
      c.role = ColumnRole::kFeature;
    } else if (f[2] == "label") {
      c.role = ColumnRole::kLabel;
    } else if (f[2] == "covariate") {
      c.role = ColumnRole::kCovariate;
    } else if (f[2] == "ignore") {
      c.role = ColumnRole::kIgnore;
    } else {
      bad("unknown role '" + f[2] + "'");
    }
    if (!names.insert(c.name).second) bad("duplicate column '" + c.name + "'");
    out.push_back(std::move(c));
  }
  return out;
}

Dataset parse_tabular_csv(std::string_view csv, const std::vector<SchemaColumn>& schema) {
  std::vector<std::string_view> lines = split_lines(csv);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorKind::kMissingColumn, "csv has no header");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos.emplace(header[i], i);

  std::size_t label_count = 0;
  std::vector<std::size_t> col_index;
  for (const SchemaColumn& c : schema) {
    auto it = pos.find(c.name);
    if (it == pos.end()) fail(ErrorKind::kMissingColumn, "csv lacks column '" + c.name + "'");
    col_index.push_back(it->second);
    if (c.role == ColumnRole::kLabel) ++label_count;
  }
  if (label_count != 1) {
    fail(ErrorKind::kInvalidArgument, "schema needs exactly one label column");
  }

  // Keep rows whose used cells are all present and parseable.
  std::vector<std::vector<std::string>> rows;
  std::size_t dropped = 0;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (trim(lines[l]).empty()) continue;
    std::vector<std::string> cells = split_csv_line(lines[l]);
    bool ok = cells.size() == header.size();
    for (std::size_t k = 0; ok && k < schema.size(); ++k) {
      if (schema[k].role == ColumnRole::kIgnore) continue;
      const std::string& cell = cells[col_index[k]];
      double v = 0.0;
      if (missing(cell) || (schema[k].kind == ColumnKind::kNumeric && !parse_double(cell, v))) {
        ok = false;
      }
    }
    if (ok) {
      rows.push_back(std::move(cells));
    } else {
      ++dropped;
    }
  }
  if (rows.empty()) fail(ErrorKind::kInvalidArgument, "csv has no complete rows");

  Dataset d;
  d.dropped_rows = dropped;
  std::vector<std::vector<std::string>> levels(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (schema[k].kind != ColumnKind::kCategorical && schema[k].role != ColumnRole::kLabel) {
      continue;
    }
    std::set<std::string> s;
    for (const auto& r : rows) s.insert(r[col_index[k]]);
    levels[k].assign(s.begin(), s.end());
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (schema[k].role != ColumnRole::kFeature) continue;
    if (schema[k].kind == ColumnKind::kNumeric) {
      d.numeric_columns.push_back(d.feature_names.size());
      d.feature_names.push_back(schema[k].name);
    } else {
      for (const std::string& lv : levels[k]) d.feature_names.push_back(schema[k].name + "=" + lv);
    }
  }
  const std::size_t p = d.feature_names.size();
  if (p == 0) fail(ErrorKind::kInvalidArgument, "schema declares no feature columns");
  std::vector<double> values;
  values.reserve(rows.size() * p);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const std::string& cell = r[col_index[k]];
      switch (schema[k].role) {
        case ColumnRole::kFeature:
          if (schema[k].kind == ColumnKind::kNumeric) {
            double v = 0.0;
            parse_double(cell, v);
            values.push_back(v);
          } else {
            for (const std::string& lv : levels[k]) values.push_back(cell == lv ? 1.0 : 0.0);
          }
          break;
        case ColumnRole::kLabel: {
          auto it = std::lower_bound(levels[k].begin(), levels[k].end(), cell);
          d.labels.push_back(static_cast<int>(it - levels[k].begin()));
          break;
        }
        case ColumnRole::kCovariate:
          d.raw_columns[schema[k].name].push_back(cell);
          break;
        case ColumnRole::kIgnore:
          break;
      }
    }
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (schema[k].role == ColumnRole::kLabel) d.class_names = levels[k];
  }
  d.features = Tensor({rows.size(), p}, std::move(values));
  std::uint64_t h = fnv1a(csv);
  for (const SchemaColumn& c : schema) {
    h = fnv1a(c.name + ":" + std::to_string(static_cast<int>(c.kind)) +
                  std::to_string(static_cast<int>(c.role)) + ";",
              h);
  }
  d.content_hash = h;
  return d;
}

Dataset load_tabular_csv(const std::filesystem::path& csv, const std::filesystem::path& schema) {
  return parse_tabular_csv(read_file(csv), parse_schema(read_file(schema)));
}

IdxArray parse_idx(std::string_view bytes, std::uint32_t magic) {
  if (bytes.size() < 4) fail(ErrorKind::kTruncated, "idx header truncated");
  const std::uint32_t got = read_be32(bytes, 0);
  if (got != magic) {
    fail(ErrorKind::kBadMagic, "idx magic " + hex64(got) + ", expected " + hex64(magic));
  }
  const std::size_t ndim = magic & 0xff;
  if (bytes.size() < 4 + 4 * ndim) fail(ErrorKind::kTruncated, "idx dimensions truncated");
  IdxArray out;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint32_t dim = read_be32(bytes, 4 + 4 * i);
    if (dim == 0) fail(ErrorKind::kDimensionMismatch, "idx dimension of size zero");
    out.dims.push_back(dim);
    total *= dim;
    if (total > (std::uint64_t{1} << 40)) fail(ErrorKind::kTruncated, "idx payload truncated");
  }
  const std::size_t offset = 4 + 4 * ndim;
  const std::size_t have = bytes.size() - offset;
  if (have < total) fail(ErrorKind::kTruncated, "idx payload truncated");
  if (have > total) fail(ErrorKind::kDimensionMismatch, "idx file has trailing bytes");
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return out;
}

Dataset parse_mnist(std::string_view images, std::string_view labels) {
  IdxArray img = parse_idx(images, kIdxImageMagic);
  IdxArray lab = parse_idx(labels, kIdxLabelMagic);
  if (img.dims[1] != 28 || img.dims[2] != 28) {
    fail(ErrorKind::kDimensionMismatch, "images are not 28x28");
  }
  if (lab.dims[0] != img.dims[0]) {
    fail(ErrorKind::kDimensionMismatch, "image and label counts differ");
  }
  const std::size_t m = img.dims[0];
  const std::size_t p = 28 * 28;
  Dataset d;
  std::vector<double> values(m * p);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = img.data[i] / 255.0;
  d.features = Tensor({m, p}, std::move(values));
  for (std::uint8_t y : lab.data) {
    if (y > 9) fail(ErrorKind::kValueOutOfRange, "digit label " + std::to_string(y));
    d.labels.push_back(y);
  }
  for (int c = 0; c < 10; ++c) d.class_names.push_back(std::to_string(c));
  for (std::size_t i = 0; i < p; ++i) d.feature_names.push_back("px" + std::to_string(i));
  d.image_rows = 28;
  d.image_cols = 28;
  d.content_hash = fnv1a(labels, fnv1a(images));
  return d;
}

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  return parse_mnist(read_file(images), read_file(labels));
}

}  // namespace catharm::dataio
