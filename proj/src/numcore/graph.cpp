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

#include "catharm/numcore/graph.hpp"

#include "catharm/common/error.hpp"

namespace catharm::numcore {

const Shape& Node::shape() const { return graph_->shape_of(id_); }

Node Graph::push(Record record) {
  nodes_.push_back(std::move(record));
  forward_done_ = false;
  return Node(this, nodes_.size() - 1);
}

Node Graph::input(std::string name, Shape shape) {
  if (inputs_.count(name)) {
    fail(ErrorKind::kInvalidArgument, "duplicate graph input '" + name + "'");
  }
  Record r{Kind::kInput, name, std::move(shape), nullptr, {}, nullptr, Tensor()};
  Node n = push(std::move(r));
  inputs_[name] = n.id();
  return n;
}

Node Graph::parameter(std::string name, Tensor& value) {
  if (auto it = params_.find(name); it != params_.end()) {
    if (nodes_[it->second].param != &value) {
      fail(ErrorKind::kInvalidArgument,
           "parameter '" + name + "' bound to two different tensors");
    }
    return Node(this, it->second);
  }
  Record r{Kind::kParameter, name, value.shape(), nullptr, {}, &value, Tensor()};
  Node n = push(std::move(r));
  params_[name] = n.id();
  return n;
}

Node Graph::constant(Tensor value) {
  Shape shape = value.shape();
  Record r{Kind::kConstant, "", std::move(shape), nullptr, {}, nullptr,
           std::move(value)};
  return push(std::move(r));
}

Node Graph::apply(std::unique_ptr<Operation> op, std::vector<Node> inputs) {
  std::vector<Shape> shapes;
  std::vector<std::size_t> ids;
  for (const Node& in : inputs) {
    if (&in.graph() != this) {
      fail(ErrorKind::kInvalidArgument, "node from a different graph");
    }
    shapes.push_back(nodes_[in.id()].shape);
    ids.push_back(in.id());
  }
  Shape out = op->output_shape(shapes);
  std::string name(op->name());
  Record r{Kind::kOp, std::move(name), std::move(out), std::move(op),
           std::move(ids), nullptr, Tensor()};
  return push(std::move(r));
}

void Graph::set_output(Node node) { output_ = node.id(); }

Node Graph::output() const {
  if (nodes_.empty()) fail(ErrorKind::kInvalidArgument, "empty graph");
  return Node(const_cast<Graph*>(this), output_.value_or(nodes_.size() - 1));
}

const Tensor& Graph::forward(const std::map<std::string, Tensor>& inputs) {
  for (const auto& [name, t] : inputs) {
    if (!inputs_.count(name)) {
      fail(ErrorKind::kShapeMismatch, "unknown graph input '" + name + "'");
    }
  }
  std::vector<const Tensor*> args;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Record& r = nodes_[id];
    switch (r.kind) {
      case Kind::kInput: {
        auto it = inputs.find(r.name);
        if (it == inputs.end()) {
          // Re-running with no inputs keeps the previous binding.
          if (!r.bound) {
            fail(ErrorKind::kShapeMismatch, "missing graph input '" + r.name + "'");
          }
        } else {
          if (it->second.shape() != r.shape) {
            fail(ErrorKind::kShapeMismatch,
                 "input '" + r.name + "' expects " + shape_string(r.shape) +
                     ", got " + shape_string(it->second.shape()));
          }
          r.value = it->second;
          r.bound = true;
        }
        if (!r.value.all_finite()) {
          fail(ErrorKind::kNonFinite, "input '" + r.name + "' is not finite");
        }
        break;
      }
      case Kind::kParameter:
        if (r.param->shape() != r.shape) {
          fail(ErrorKind::kShapeMismatch, "parameter '" + r.name + "' changed shape");
        }
        r.value = *r.param;
        break;
      case Kind::kConstant:
        break;
      case Kind::kOp: {
        args.clear();
        for (std::size_t in : r.inputs) args.push_back(&nodes_[in].value);
        r.value = r.op->forward(args);
        if (r.value.shape() != r.shape) {
          fail(ErrorKind::kShapeMismatch,
               "op " + r.name + " produced " + shape_string(r.value.shape()) +
                   ", declared " + shape_string(r.shape));
        }
        if (!r.value.all_finite()) {
          fail(ErrorKind::kNonFinite,
               "op " + r.name + " (node " + std::to_string(id) +
                   ") produced a non-finite value");
        }
        break;
      }
    }
  }
  forward_done_ = true;
  return nodes_[output().id()].value;
}

std::map<std::string, Tensor> Graph::backward() {
  if (!forward_done_) {
    fail(ErrorKind::kForwardNotRun, "backward() before forward()");
  }
  const std::size_t out = output().id();
  if (shape_size(nodes_[out].shape) != 1) {
    fail(ErrorKind::kOutputNotScalar,
         "backward() needs a scalar output, got " + shape_string(nodes_[out].shape));
  }
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[out] = Tensor::filled(nodes_[out].shape, 1.0);
  std::vector<const Tensor*> args;
  for (std::size_t id = out + 1; id-- > 0;) {
    Record& r = nodes_[id];
    if (r.kind != Kind::kOp || !grads[id]) continue;
    args.clear();
    for (std::size_t in : r.inputs) args.push_back(&nodes_[in].value);
    std::vector<Tensor> g = r.op->backward(args, r.value, *grads[id]);
    for (std::size_t k = 0; k < r.inputs.size(); ++k) {
      const std::size_t in = r.inputs[k];
      if (nodes_[in].kind == Kind::kConstant) continue;
      if (!grads[in]) {
        grads[in] = std::move(g[k]);
      } else {
        auto dst = grads[in]->data();
        auto src = g[k].data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
  }
  std::map<std::string, Tensor> result;
  for (const auto& [name, id] : params_) {
    result[name] = grads[id] ? std::move(*grads[id]) : Tensor(nodes_[id].shape);
  }
  return result;
}

const Tensor& Graph::value(Node node) const {
  if (!forward_done_) fail(ErrorKind::kForwardNotRun, "value() before forward()");
  return nodes_[node.id()].value;
}

std::vector<std::string> Graph::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& [name, id] : params_) names.push_back(name);
  return names;
}

Tensor& Graph::parameter_value(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    fail(ErrorKind::kInvalidArgument, "unknown parameter '" + name + "'");
  }
  return *nodes_[it->second].param;
}

}  // namespace catharm::numcore
