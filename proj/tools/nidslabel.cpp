#include <iostream>

#include "nidslabel/app.hpp"

int main(int argc, char** argv) { return nidslabel::run(argc, argv, std::cout, std::cerr); }
