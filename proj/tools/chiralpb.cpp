#include "chiralpb/cli.hpp"

int main(int argc, char** argv)
{
    return chiralpb::run(argc, argv);
}
