#include "graphgrpo/dataset.hpp"

#include <zlib.h>

#include <fstream>
#include <sstream>

namespace graphgrpo {
namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

int parse_int(const std::string& tok, int line) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(tok, &used);
  } catch (const std::exception&) {
    throw DatasetParseError(line, "expected an integer, got '" + tok + "'");
  }
  if (used != tok.size()) throw DatasetParseError(line, "expected an integer, got '" + tok + "'");
  return value;
}

}  // namespace

Dataset parse_dataset(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  Dataset data;
  std::size_t at = 0;
  while (at < lines.size() && tokens(lines[at]).empty()) ++at;
  if (at == lines.size()) return data;

  const auto header = tokens(lines[at]);
  int line_no = static_cast<int>(at) + 1;
  if (header.size() != 6 || header[0] != "N" || header[2] != "NODE_CLASSES" ||
      header[4] != "EDGE_CLASSES") {
    throw DatasetParseError(line_no, "malformed header");
  }
  const int count = parse_int(header[1], line_no);
  data.labels.node_classes = parse_int(header[3], line_no);
  data.labels.edge_classes = parse_int(header[5], line_no);
  if (count < 0 || data.labels.node_classes < 1 || data.labels.edge_classes < 1) {
    throw DatasetParseError(line_no, "header values out of range");
  }
  ++at;

  auto next_line = [&](const char* what) -> const std::string& {
    if (at >= lines.size()) {
      throw DatasetParseError(static_cast<int>(at) + 1,
                              std::string("unexpected end of file, expected ") + what);
    }
    line_no = static_cast<int>(at) + 1;
    return lines[at++];
  };

  for (int gi = 0; gi < count; ++gi) {
    const auto head = tokens(next_line("G <n>"));
    if (head.size() != 2 || head[0] != "G") throw DatasetParseError(line_no, "expected 'G <n>'");
    const int n = parse_int(head[1], line_no);
    if (n < 0) throw DatasetParseError(line_no, "negative node count");
    GraphState g(n);
    const auto nodes = tokens(next_line("node labels"));
    if (static_cast<int>(nodes.size()) != n) {
      throw DatasetParseError(line_no, "expected " + std::to_string(n) + " node labels");
    }
    for (int i = 0; i < n; ++i) {
      const int x = parse_int(nodes[i], line_no);
      if (x < 0 || x >= data.labels.node_classes) {
        throw DatasetParseError(line_no, "node label out of range");
      }
      g.set_node(i, x);
    }
    int last_pair = -1;
    while (true) {
      const auto row = tokens(next_line("edge line or END"));
      if (row.size() == 1 && row[0] == "END") break;
      if (row.size() != 3) throw DatasetParseError(line_no, "expected '<i> <j> <label>' or END");
      const int i = parse_int(row[0], line_no);
      const int j = parse_int(row[1], line_no);
      const int e = parse_int(row[2], line_no);
      if (i < 0 || j < 0 || i >= n || j >= n || i >= j) {
        throw DatasetParseError(line_no, "edge endpoints must satisfy 0 <= i < j < n");
      }
      if (e <= 0 || e >= data.labels.edge_classes) {
        throw DatasetParseError(line_no, "edge label out of range");
      }
      const int p = GraphState::pair_index(i, j, n);
      if (p <= last_pair) throw DatasetParseError(line_no, "edges out of order or repeated");
      last_pair = p;
      g.set_edge(i, j, e);
    }
    data.graphs.push_back(std::move(g));
  }
  while (at < lines.size()) {
    if (!tokens(lines[at]).empty()) {
      throw DatasetParseError(static_cast<int>(at) + 1, "trailing content after last graph");
    }
    ++at;
  }
  return data;
}

std::string format_dataset(const Dataset& data) {
  std::ostringstream out;
  out << "N " << data.graphs.size() << " NODE_CLASSES " << data.labels.node_classes
      << " EDGE_CLASSES " << data.labels.edge_classes << '\n';
  for (const auto& g : data.graphs) {
    const int n = g.num_nodes();
    out << "G " << n << '\n';
    for (int i = 0; i < n; ++i) out << (i ? " " : "") << g.node(i);
    out << '\n';
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (g.edge(i, j) != kNoEdge) out << i << ' ' << j << ' ' << g.edge(i, j) << '\n';
      }
    }
    out << "END\n";
  }
  return out.str();
}

Dataset read_dataset(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::string text;
  char buffer[1 << 15];
  int got = 0;
  while ((got = gzread(file, buffer, sizeof(buffer))) > 0) text.append(buffer, got);
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw std::runtime_error("error while reading dataset '" + path + "'");
  return parse_dataset(text);
}

void write_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
  out << format_dataset(data);
  if (!out) throw std::runtime_error("error while writing dataset '" + path + "'");
}

}  // namespace graphgrpo
