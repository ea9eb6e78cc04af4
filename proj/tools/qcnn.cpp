#include <iostream>

#include "qcnn/app.hpp"

int main(int argc, char** argv) { return qcnn::run_cli(argc, argv, std::cout, std::cerr); }
