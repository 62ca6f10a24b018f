import inspect

from .exceptions import ValidationError

_validators = {}
_logger = None

NUMBER = (int, float)
_JSON_TYPES = (str, int, float, list, dict, bool)


def _log_error(error: str):
    global _logger
    if _logger is None:
        from .utils.logger import get_logger

        _logger = get_logger("vigil.validator")
    _logger.error(error)


def _fail(error: str):
    _log_error(error)
    raise ValidationError(error)


def _types_of(field_type) -> tuple:
    return field_type if isinstance(field_type, tuple) else (field_type,)


def _is_validator(field_type) -> bool:
    return inspect.isclass(field_type) and issubclass(field_type, Validator)


class Validator:
    """Declarative check of a JSON document. Class attributes that are ``Field``
    objects describe the expected keys; ``Field(key=...)`` names keys that are not
    valid identifiers (``lambda``)."""

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.retrieve_fields()
        _validators[cls.__name__] = cls

    @classmethod
    def retrieve_fields(cls):
        validators = {}
        for field_name, field_obj in list(cls.__dict__.items()):
            if not isinstance(field_obj, Field):
                continue
            validators[field_obj.key or field_name] = field_obj
            delattr(cls, field_name)
        cls.validators = validators

    @classmethod
    def validated_message(cls, message, many: bool = False):
        if type(message) not in [dict, list]:
            _fail(f"Unexpected document. Accepted dict or list but got {type(message)}.")
        if type(message) is list:
            if not many:
                _fail(
                    f"Unexpected document, expected dict got {type(message)}. "
                    "Use many=True to handle a list of dicts"
                )
            return [cls._validate_message(m) for m in message]
        return cls._validate_message(message)

    @classmethod
    def _validate_message(cls, message):
        if type(message) is not dict:
            _fail(f"Unexpected document in {cls.__name__}, expected dict")
        for key, field_obj in cls.validators.items():
            if key not in message:
                if not hasattr(field_obj, "default"):
                    _fail(f'Expected field "{key}" not found')
                message[key] = field_obj.default
            value = message[key]
            if value is None:
                if field_obj.null is False:
                    _fail(f'Wrong value None for field "{key}" (because null=False)')
                continue
            if _is_validator(field_obj.type):
                message[key] = field_obj.type.validated_message(value, many=field_obj.many)
                continue
            if field_obj.many:
                if type(value) is not list:
                    _fail(f'Expected list for field "{key}" but got {type(value)} instead')
                for item in value:
                    field_obj.check_type(key, item)
                continue
            field_obj.check_type(key, value)
        return message


class Field:
    def __init__(self, many=False, null=False, key=None, **kwargs):
        self.many = many
        self.key = key
        kwargs["null"] = null
        self.validate_field(kwargs)
        self.__dict__.update(kwargs)

    def check_type(self, key, value):
        types = _types_of(self.type)
        # bool is an int subclass, accept it only where bool is declared
        if isinstance(value, bool) and bool not in types:
            _fail(f'Expected {self.type} type of field "{key}" but got bool instead')
        if not isinstance(value, types):
            _fail(
                f'Expected {self.type} type of field "{key}" but got {type(value)} instead'
            )

    @staticmethod
    def validate_field(kwargs):
        if "type" not in kwargs:
            _fail("type required in Field")
        if "default" in kwargs and kwargs["default"] is None and kwargs["null"] is False:
            _fail("You have to set null=True first if you want to set default=None")
        field_type = kwargs["type"]
        if _is_validator(field_type):
            if field_type.__name__ not in _validators:
                _fail(
                    f"Validator {field_type.__name__} hasn't registered yet. You have to register it first"
                )
            return
        for t in _types_of(field_type):
            if t not in _JSON_TYPES:
                _fail(
                    f"Invalid data type {t} for field."
                    f" Only JSON data types or another Validator class allowed"
                )
        if (
            "default" in kwargs
            and kwargs["default"] is not None
            and not isinstance(kwargs["default"], field_type)
        ):
            _fail(f'Your default type is {type(kwargs["default"])} but expected {field_type}')


class SourceValidator(Validator):
    mu = Field(type=NUMBER)
    lambda_ = Field(type=NUMBER, key="lambda")


class ConfigValidator(Validator):
    n_sources = Field(type=int)
    k_select = Field(type=int)
    horizon = Field(type=int)
    rate_budget = Field(type=NUMBER)
    sources = Field(type=SourceValidator, many=True)
    seed = Field(type=(int, str), null=True, default=None)
    trials = Field(type=int, default=10000)
    workers = Field(type=int, default=1)


class ThreeStageValidator(Validator):
    switch_times = Field(type=int, many=True)
    persistent_states = Field(type=list, many=True)


class PolicyTableValidator(Validator):
    decisions = Field(type=list)


class ExperimentValidator(Validator):
    config = Field(type=dict, null=True, default=None)
    mode = Field(type=str)
    sweep_rates = Field(type=NUMBER, many=True, null=True, default=None)
    trials = Field(type=int, default=10000)
    seed = Field(type=(int, str), null=True, default=None)
    output_path = Field(type=str, default="results")
    workers = Field(type=int, default=1)
    policy_path = Field(type=str, null=True, default=None)
    full = Field(type=bool, default=False)
