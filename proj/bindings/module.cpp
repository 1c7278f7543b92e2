#include <pybind11/pybind11.h>
PYBIND11_MODULE(_cspop, m) { m.doc() = "placeholder"; }
