#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "gtan/corpus.hpp"
#include "gtan/tensor.hpp"

namespace gtan::graph {

enum class NodeType { Question = 0, Answer = 1, Word = 2 };
std::string_view to_string(NodeType type);

struct Node {
  NodeType type;
  std::size_t payload;  // 0 for the question, answer index, or vocabulary index
};

// Per-question heterogeneous text graph.
//
// Node order is fixed: the question node, the answer nodes in input order,
// then one node per distinct word in order of first occurrence (question
// text first, then answers). Edges join the question or an answer to the
// words of its text with tf-idf weights; every node has a unit self-loop.
struct QuestionGraph {
  std::vector<Node> nodes;
  // Row-sparse adjacency: rows[i] holds (column, weight) sorted by column,
  // self-loop included.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<std::size_t> answer_nodes;
  std::map<std::size_t, std::size_t> word_nodes;  // vocabulary index -> node
  // Word node of every token position, duplicates included.
  std::vector<std::size_t> question_positions;
  std::vector<std::vector<std::size_t>> answer_positions;
  bool symmetric = true;

  static constexpr std::size_t question_node = 0;

  std::size_t num_nodes() const noexcept { return nodes.size(); }
  std::size_t num_answers() const noexcept { return answer_nodes.size(); }
  std::size_t num_words() const noexcept { return word_nodes.size(); }
  std::size_t first_word_node() const noexcept { return 1 + answer_nodes.size(); }
  double weight(std::size_t i, std::size_t j) const;
  Tensor dense_adjacency() const;
};

QuestionGraph build_graph(const corpus::Question& question, const corpus::TfidfIndex& tfidf);

enum class Normalization { None, RowL1 };
Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization mode);

// RowL1 divides each row's off-diagonal weights by their sum and keeps the
// self-loop at 1; the result is read as directed row-to-column weights.
QuestionGraph normalize_adjacency(QuestionGraph graph, Normalization mode);

// One line per stored off-diagonal entry: "src_type:src_id dst_type:dst_id weight".
void write_edge_list(std::ostream& out, const QuestionGraph& graph,
                     const corpus::Question& question, const corpus::Vocabulary* vocab);

}  // namespace gtan::graph
