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

#ifndef CATHARM_NUMCORE_GRAPH_HPP_
#define CATHARM_NUMCORE_GRAPH_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catharm/numcore/tensor.hpp"

namespace catharm::numcore {

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph
// lives.
class Node {
 public:
  Node() = default;
  Node(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Shape& shape() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// A differentiable operation. forward() may stash whatever backward() needs;
// an instance belongs to exactly one node.
class Operation {
 public:
  virtual ~Operation() = default;
  virtual std::string_view name() const = 0;
  virtual Shape output_shape(std::span<const Shape> inputs) const = 0;
  virtual Tensor forward(std::span<const Tensor* const> inputs) = 0;
  // Returns one gradient per input, each shaped like that input.
  virtual std::vector<Tensor> backward(std::span<const Tensor* const> inputs,
                                       const Tensor& output,
                                       const Tensor& grad_output) = 0;
};

// Define-then-run computation graph. Nodes are appended in topological order
// by construction; forward() evaluates them in that order and backward()
// walks them in reverse, so gradient accumulation order is fixed.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Node input(std::string name, Shape shape);
  // `value` is borrowed and must outlive the graph. Registering the same
  // name twice returns the original node.
  Node parameter(std::string name, Tensor& value);
  Node constant(Tensor value);
  Node apply(std::unique_ptr<Operation> op, std::vector<Node> inputs);

  void set_output(Node node);
  Node output() const;

  const Tensor& forward(const std::map<std::string, Tensor>& inputs = {});
  std::map<std::string, Tensor> backward();

  bool forward_done() const { return forward_done_; }
  const Tensor& value(Node node) const;
  const Shape& shape_of(std::size_t id) const { return nodes_[id].shape; }
  std::size_t size() const { return nodes_.size(); }

  std::vector<std::string> parameter_names() const;
  Tensor& parameter_value(const std::string& name);

 private:
  enum class Kind { kInput, kParameter, kConstant, kOp };
  struct Record {
    Kind kind;
    std::string name;
    Shape shape;
    std::unique_ptr<Operation> op;
    std::vector<std::size_t> inputs;
    Tensor* param = nullptr;
    Tensor value;
    bool bound = false;
  };

  Node push(Record record);

  std::vector<Record> nodes_;
  std::map<std::string, std::size_t> params_;
  std::map<std::string, std::size_t> inputs_;
  std::optional<std::size_t> output_;
  bool forward_done_ = false;
};

}  // namespace catharm::numcore

#endif  // CATHARM_NUMCORE_GRAPH_HPP_
