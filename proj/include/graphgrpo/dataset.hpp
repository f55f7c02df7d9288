#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "graphgrpo/graph.hpp"

namespace graphgrpo {

// Line-oriented graph list:
//
//   N <count> NODE_CLASSES <a> EDGE_CLASSES <b>
//   G <n>
//   <n node labels>
//   <i> <j> <label>        one line per nonzero pair, i < j, pair order
//   END
//
// Reads are gzip-transparent. An empty file is an empty list.
struct Dataset {
  LabelSpace labels;
  std::vector<GraphState> graphs;
};

class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

Dataset parse_dataset(const std::string& text);
std::string format_dataset(const Dataset& data);

Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& data, const std::string& path);

}  // namespace graphgrpo
