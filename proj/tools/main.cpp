#include "riskscore/common.hpp"

int main() { return 0; }
