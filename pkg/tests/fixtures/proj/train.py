import cuda
import numpy
import scipy
import tensorflow as tf


def main():
    print(tf.__version__, numpy.__version__, scipy.__version__, cuda)


if __name__ == "__main__":
    main()
