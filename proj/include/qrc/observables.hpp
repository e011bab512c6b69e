// Copyright 2026 The QRC Measurement Authors
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

#pragma once

#include "qrc/quantum.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

/// sigma^axis on one qubit (order 1) or sigma^axis (x) sigma^axis on a pair
/// i < j (order 2).
struct Observable {
  Axis axis;
  std::vector<int> qubits;

  int order() const noexcept { return static_cast<int>(qubits.size()); }

  PauliString pauli(int num_qubits) const {
    std::vector<PauliFactor> f;
    for (int q : qubits) f.push_back({q, axis});
    return PauliString(num_qubits, f);
  }

  /// "x3" or "zz04"; qubit indices are written in decimal, pairs joined by '_'
  /// when either index exceeds 9.
  std::string name() const {
    std::string out(static_cast<std::size_t>(order()), axis_char(axis));
    const bool wide = std::any_of(qubits.begin(), qubits.end(), [](int q) { return q > 9; });
    for (std::size_t i = 0; i < qubits.size(); ++i) {
      if (wide && i > 0) out += '_';
      out += std::to_string(qubits[i]);
    }
    return out;
  }

  friend bool operator==(const Observable&, const Observable&) = default;
};

enum class OrderSelector { order1, order2, both };

inline OrderSelector parse_order_selector(std::string_view s) {
  if (s == "order1") return OrderSelector::order1;
  if (s == "order2") return OrderSelector::order2;
  if (s == "both") return OrderSelector::both;
  throw std::invalid_argument("unknown observable selector '" + std::string(s) +
                              "' (expected order1, order2 or both)");
}

inline std::string to_string(OrderSelector s) {
  switch (s) {
    case OrderSelector::order1: return "order1";
    case OrderSelector::order2: return "order2";
    case OrderSelector::both: return "both";
  }
  return "?";
}

/// Ordered list of observables. Canonical ordering: all order-1 terms
/// (qubit-major, axes x, y, z), then all order-2 pairs i < j (pair-major,
/// axes x, y, z). Readout weights index into this order.
class ObservableSet {
 public:
  ObservableSet() = default;
  ObservableSet(int num_qubits, std::vector<Observable> items)
      : num_qubits_(num_qubits), items_(std::move(items)) {
    for (const auto& o : items_) {
      if (o.order() != 1 && o.order() != 2)
        throw std::invalid_argument("observables must have order 1 or 2");
      for (int q : o.qubits)
        if (q < 0 || q >= num_qubits)
          throw std::out_of_range("observable qubit index out of range");
      if (o.order() == 2 && !(o.qubits[0] < o.qubits[1]))
        throw std::invalid_argument("pair observables need i < j");
    }
  }

  static ObservableSet build(int num_qubits, OrderSelector orders,
                             std::vector<Axis> axes = {Axis::x, Axis::y, Axis::z}) {
    std::sort(axes.begin(), axes.end());
    axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
    if (axes.empty()) throw std::invalid_argument("observable set needs at least one axis");
    std::vector<Observable> items;
    if (orders != OrderSelector::order2)
      for (int q = 0; q < num_qubits; ++q)
        for (Axis a : axes) items.push_back({a, {q}});
    if (orders != OrderSelector::order1)
      for (int i = 0; i < num_qubits; ++i)
        for (int j = i + 1; j < num_qubits; ++j)
          for (Axis a : axes) items.push_back({a, {i, j}});
    return ObservableSet(num_qubits, std::move(items));
  }

  int num_qubits() const noexcept { return num_qubits_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const Observable& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<Observable>& items() const noexcept { return items_; }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }

  bool uses_axis(Axis a) const {
    return std::any_of(items_.begin(), items_.end(),
                       [a](const Observable& o) { return o.axis == a; });
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& o : items_) out.push_back(o.name());
    return out;
  }

 private:
  int num_qubits_ = 0;
  std::vector<Observable> items_;
};

}  // namespace qrc
