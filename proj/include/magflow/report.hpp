#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace magflow {

// Minimal ordered JSON value for report emission. Keys keep insertion order
// and numbers are serialized with 17 significant digits, so identical inputs
// produce byte-identical files. Non-finite values are emitted as the strings
// "inf" / "-inf" / "nan".
class Json {
 public:
  Json() : type_(Type::Null) {}

  static Json object();
  static Json array();
  static Json number(double v);
  static Json integer(long long v);
  static Json boolean(bool v);
  static Json string(std::string v);

  Json& set(const std::string& key, Json v);  // object
  Json& push(Json v);                         // array

  std::string dump(int indent = 2) const;

 private:
  enum class Type { Null, Bool, Int, Num, Str, Arr, Obj };
  Type type_;
  bool bool_ = false;
  long long int_ = 0;
  double num_ = 0.0;
  std::string str_;
  std::vector<Json> arr_;
  std::vector<std::pair<std::string, Json>> obj_;

  void dump_to(std::string& out, int indent, int depth) const;
};

std::string format_number17(double v);

}  // namespace magflow
