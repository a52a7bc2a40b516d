from libs.log.file_logger import FileLogger


class RotablurError(Exception):
    exit_code = 1

    def __init__(self, message, message_markup=None, *args, **kwargs):
        super().__init__(message, *args, **kwargs)
        self.message = message
        self.message_markup = message_markup

        logger = FileLogger(self.__class__.__name__)
        logger.error(message)


class ParameterError(RotablurError):
    """Invalid parameters or violated preconditions."""

    exit_code = 1


class ImageIOError(RotablurError):
    exit_code = 2


class ProtocolError(RotablurError):
    """The identification or verification protocol could not be carried out."""

    exit_code = 3


class EstimationError(RotablurError):
    exit_code = 3
