#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace edgesec {

/// Value-or-error return type. E is a small error enum; T must differ from E.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(E error) : v_(error) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  T& value() {
    assert(ok());
    return std::get<T>(v_);
  }
  const T& value() const {
    assert(ok());
    return std::get<T>(v_);
  }
  E error() const {
    assert(!ok());
    return std::get<E>(v_);
  }

  T& operator*() { return value(); }
  const T& operator*() const { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, E> v_;
};

/// Result with no payload on success.
template <typename E>
using Status = Result<std::monostate, E>;

}  // namespace edgesec
