#include <iostream>

#include "gtheory/report.hpp"

int main(int argc, char** argv) { return gtheory::cli_main(argc, argv, std::cout, std::cerr); }
