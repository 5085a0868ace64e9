import openai
def get_completion(system_message, user_message, deployment_name='deployment_name', temperature=0, max_tokens=1000, retries=3, delay=2) -> str:
...
  for attempt in range(retries):       
    response = openai.ChatCompletion.create(
    engine=deployment_name,messages=messages,temperature=temperature, max_tokens=max_tokens)
    return response['choices'][0]['message']['content'] 
    if attempt < retries - 1:
      print(f"Retrying in {delay} seconds...")
      time.sleep(delay)  # Wait before retrying
    else:
      print("Max retries reached, unable to get a response.")
      raise #Reraise exception if all retries fail
