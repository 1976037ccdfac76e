#include "vulnboost/vulnboost.hpp"
int main() { return 0; }
