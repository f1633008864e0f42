#include "rdp/errors.hpp"

namespace rdp {

void throw_argument(const std::string& what) { throw ArgumentError(what); }
void throw_capacity(const std::string& what) { throw CapacityError(what); }
void throw_numeric(const std::string& what) { throw NumericError(what); }

}  // namespace rdp
