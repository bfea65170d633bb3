#include "gtan/graph.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <string>

#include "gtan/error.hpp"

namespace gtan::graph {

std::string_view to_string(NodeType type) {
  switch (type) {
    case NodeType::Question: return "question";
    case NodeType::Answer: return "answer";
    case NodeType::Word: return "word";
  }
  return "word";
}

double QuestionGraph::weight(std::size_t i, std::size_t j) const {
  const auto& row = rows.at(i);
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const auto& entry, std::size_t col) { return entry.first < col; });
  return it != row.end() && it->first == j ? it->second : 0.0;
}

Tensor QuestionGraph::dense_adjacency() const {
  Tensor a(num_nodes(), num_nodes());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, w] : rows[i]) a(i, j) = w;
  }
  return a;
}

QuestionGraph build_graph(const corpus::Question& question, const corpus::TfidfIndex& tfidf) {
  QuestionGraph g;
  const std::size_t n = question.answers.size();
  g.nodes.push_back({NodeType::Question, 0});
  for (std::size_t i = 0; i < n; ++i) {
    g.answer_nodes.push_back(g.nodes.size());
    g.nodes.push_back({NodeType::Answer, i});
  }

  auto word_node = [&](std::size_t token) {
    if (token >= tfidf.vocabulary_size()) {
      fail(ErrorKind::Index, "question " + question.id + ": token " + std::to_string(token) +
                                 " outside vocabulary of size " +
                                 std::to_string(tfidf.vocabulary_size()));
    }
    auto [it, inserted] = g.word_nodes.emplace(token, g.nodes.size());
    if (inserted) g.nodes.push_back({NodeType::Word, token});
    return it->second;
  };
  for (std::size_t t : question.tokens) g.question_positions.push_back(word_node(t));
  g.answer_positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t : question.answers[i].tokens) {
      g.answer_positions[i].push_back(word_node(t));
    }
  }

  g.rows.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) g.rows[i].emplace_back(i, 1.0);
  auto connect = [&](std::size_t text_node, const std::vector<std::size_t>& tokens) {
    for (const auto& [token, w] : tfidf.document(tokens)) {
      const std::size_t word = g.word_nodes.at(token);
      g.rows[text_node].emplace_back(word, w);
      g.rows[word].emplace_back(text_node, w);
    }
  };
  connect(QuestionGraph::question_node, question.tokens);
  for (std::size_t i = 0; i < n; ++i) connect(g.answer_nodes[i], question.answers[i].tokens);
  for (auto& row : g.rows) std::sort(row.begin(), row.end());
  return g;
}

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::None;
  if (name == "row_l1") return Normalization::RowL1;
  fail(ErrorKind::Config, "unknown normalization '" + std::string(name) + "' (expected none or row_l1)");
}

std::string_view to_string(Normalization mode) {
  return mode == Normalization::RowL1 ? "row_l1" : "none";
}

QuestionGraph normalize_adjacency(QuestionGraph graph, Normalization mode) {
  if (mode == Normalization::None) return graph;
  for (std::size_t i = 0; i < graph.rows.size(); ++i) {
    double total = 0.0;
    for (const auto& [j, w] : graph.rows[i]) {
      if (j != i) total += w;
    }
    if (total <= 0.0) continue;
    for (auto& [j, w] : graph.rows[i]) {
      if (j != i) w /= total;
    }
  }
  graph.symmetric = false;
  return graph;
}

void write_edge_list(std::ostream& out, const QuestionGraph& graph,
                     const corpus::Question& question, const corpus::Vocabulary* vocab) {
  auto label = [&](std::size_t node) {
    const Node& nd = graph.nodes[node];
    std::string id;
    switch (nd.type) {
      case NodeType::Question: id = question.id; break;
      case NodeType::Answer: id = question.answers[nd.payload].id; break;
      case NodeType::Word:
        id = vocab != nullptr ? vocab->token(nd.payload) : std::to_string(nd.payload);
        break;
    }
    return std::string(to_string(nd.type)) + ":" + id;
  };
  const auto precision = out.precision(10);
  for (std::size_t i = 0; i < graph.rows.size(); ++i) {
    for (const auto& [j, w] : graph.rows[i]) {
      if (j == i) continue;
      out << label(i) << ' ' << label(j) << ' ' << w << '\n';
    }
  }
  out.precision(precision);
}

}  // namespace gtan::graph
