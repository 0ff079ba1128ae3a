// Copyright 2026 The dibell Authors.
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

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

#include <fmt/format.h>

#include "dibell/sdp.hpp"

namespace dibell::sdp {
namespace {

// SDPA matrices are symmetric; our functionals weight each variable once, so
// an off-diagonal coefficient v is the entry v/2 at (i,j) and (j,i).
void write_matrix(std::ostream& out, int matno, const LinearFunctional& f) {
  std::map<std::tuple<int, int, int>, double> acc;
  for (const Entry& e : f) {
    const int r = std::min(e.row, e.col);
    const int c = std::max(e.row, e.col);
    acc[{e.block, r, c}] += r == c ? e.value : 0.5 * e.value;
  }
  for (const auto& [key, v] : acc) {
    if (v == 0.0) continue;
    const auto [b, r, c] = key;
    out << fmt::format("{} {} {} {} {:.17g}\n", matno, b + 1, r + 1, c + 1, v);
  }
}

// Next non-comment line with separators ({}(), and commas) blanked.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '"' || line[first] == '*') continue;
    std::replace_if(line.begin(), line.end(),
                    [](char ch) { return ch == '{' || ch == '}' || ch == '(' || ch == ')' || ch == ','; },
                    ' ');
    return true;
  }
  return false;
}

}  // namespace

void write_sdpa(const SdpProblem& problem, std::ostream& out) {
  problem.validate();
  out << "\"dibell SDP: maximize F0.X subject to Fi.X = ci, X psd\n";
  out << problem.num_constraints() << " = mDIM\n";
  out << problem.block_sizes.size() << " = nBLOCK\n";
  for (std::size_t b = 0; b < problem.block_sizes.size(); ++b) {
    out << (b ? " " : "") << problem.block_sizes[b];
  }
  out << " = bLOCKsTRUCT\n";
  for (std::size_t i = 0; i < problem.rhs.size(); ++i) {
    out << (i ? " " : "") << fmt::format("{:.17g}", problem.rhs[i]);
  }
  out << "\n";
  write_matrix(out, 0, problem.objective);
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    write_matrix(out, static_cast<int>(i) + 1, problem.constraints[i]);
  }
}

SdpProblem read_sdpa(std::istream& in) {
  std::string line;
  auto header_int = [&](const char* what) {
    if (!next_line(in, line)) throw std::runtime_error(fmt::format("SDPA: missing {}", what));
    std::istringstream ss(line);
    long v = 0;
    if (!(ss >> v)) throw std::runtime_error(fmt::format("SDPA: cannot parse {}", what));
    return v;
  };
  const long m = header_int("mDIM");
  const long nblock = header_int("nBLOCK");
  if (m < 0 || nblock < 1) throw std::runtime_error("SDPA: bad dimensions");

  // Diagonal (negative-size) blocks become runs of 1x1 blocks.
  SdpProblem p;
  std::vector<int> first_block;
  std::vector<bool> diagonal;
  std::vector<long> extent;
  {
    std::vector<long> sizes;
    while (static_cast<long>(sizes.size()) < nblock) {
      if (!next_line(in, line)) throw std::runtime_error("SDPA: truncated block structure");
      std::istringstream ss(line);
      long v = 0;
      while (static_cast<long>(sizes.size()) < nblock && ss >> v) sizes.push_back(v);
    }
    for (long s : sizes) {
      if (s == 0) throw std::runtime_error("SDPA: zero block size");
      first_block.push_back(static_cast<int>(p.block_sizes.size()));
      diagonal.push_back(s < 0);
      extent.push_back(s < 0 ? -s : s);
      if (s > 0) {
        p.add_block(static_cast<int>(s));
      } else {
        for (long t = 0; t < -s; ++t) p.add_block(1);
      }
    }
  }
  p.rhs.reserve(static_cast<std::size_t>(m));
  while (static_cast<long>(p.rhs.size()) < m) {
    if (!next_line(in, line)) throw std::runtime_error("SDPA: truncated objective vector");
    std::istringstream ss(line);
    double v = 0.0;
    while (static_cast<long>(p.rhs.size()) < m && ss >> v) p.rhs.push_back(v);
  }
  p.constraints.assign(static_cast<std::size_t>(m), {});

  while (next_line(in, line)) {
    std::istringstream ss(line);
    long matno = 0, blk = 0, i = 0, j = 0;
    double v = 0.0;
    if (!(ss >> matno >> blk >> i >> j >> v)) {
      throw std::runtime_error(fmt::format("SDPA: bad entry line '{}'", line));
    }
    if (matno < 0 || matno > m || blk < 1 || blk > nblock) {
      throw std::runtime_error(fmt::format("SDPA: entry out of range '{}'", line));
    }
    const auto b = static_cast<std::size_t>(blk - 1);
    if (i < 1 || j < 1 || i > extent[b] || j > extent[b]) {
      throw std::runtime_error(fmt::format("SDPA: index outside block '{}'", line));
    }
    Entry e{};
    if (diagonal[b]) {
      if (i != j) throw std::runtime_error("SDPA: off-diagonal entry in diagonal block");
      e = {first_block[b] + static_cast<int>(i - 1), 0, 0, v};
    } else {
      e = {first_block[b], static_cast<int>(std::min(i, j) - 1),
           static_cast<int>(std::max(i, j) - 1), i == j ? v : 2.0 * v};
    }
    (matno == 0 ? p.objective : p.constraints[static_cast<std::size_t>(matno - 1)]).push_back(e);
  }
  p.validate();
  return p;
}

}  // namespace dibell::sdp
