"""Unified LLM client using LiteLLM.

Talks to any OpenAI-compatible chat-completions endpoint (vLLM, SGLang,
hosted gateways) through a single async interface.
"""

import logging
from typing import Any, Optional, Union

import litellm

# Suppress verbose LiteLLM logging
litellm.set_verbose = False
logging.getLogger("LiteLLM").setLevel(logging.WARNING)


def litellm_model_name(model_name: str) -> str:
    """Route bare model names through LiteLLM's OpenAI-compatible provider."""
    return model_name if "/" in model_name else f"openai/{model_name}"


async def get_completion_async(
    model: str,
    messages: list[dict],
    max_tokens: int = 4096,
    temperature: float = 0.0,
    api_base: Optional[str] = None,
    api_key: Optional[str] = None,
    timeout: Optional[float] = None,
    return_full_response: bool = False,
) -> Union[str, tuple[str, Any]]:
    """
    Get a chat completion via LiteLLM.

    Args:
        model: Model identifier, e.g. "openai/Qwen2.5-Coder-32B-Instruct"
        messages: List of message dicts with role and content; a trailing
            assistant message is sent as a prefill
        max_tokens: Maximum response tokens
        temperature: Sampling temperature (0.0-2.0)
        api_base: Base URL of the chat-completions server
        api_key: Bearer token
        timeout: Request timeout in seconds
        return_full_response: If True, return (text, response) tuple for usage tracking

    Returns:
        Response text content, or (text, response) tuple if return_full_response=True

    Raises:
        Exception: If API call fails
    """
    kwargs: dict[str, Any] = {
        "model": model,
        "messages": messages,
        "max_tokens": max_tokens,
        "temperature": temperature,
    }
    if api_base:
        kwargs["api_base"] = api_base
    if api_key:
        kwargs["api_key"] = api_key
    if timeout:
        kwargs["timeout"] = timeout

    response = await litellm.acompletion(**kwargs)
    text = response.choices[0].message.content or ""

    if return_full_response:
        return text, response
    return text
