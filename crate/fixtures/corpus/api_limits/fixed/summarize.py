import os

from openai import AzureOpenAI
from tenacity import retry, stop_after_attempt, wait_random_exponential

client = AzureOpenAI(
    api_key=os.getenv("AZURE_OPENAI_KEY"),
    api_version="2024-02-01",
    azure_endpoint=os.getenv("AZURE_OPENAI_ENDPOINT"),
)


@retry(wait=wait_random_exponential(min=1, max=60), stop=stop_after_attempt(6))
def summarize(text):
    response = client.chat.completions.create(
        model="gpt-35-turbo",
        messages=[{"role": "user", "content": f"Summarize: {text}"}],
    )
    return response.choices[0].message.content
